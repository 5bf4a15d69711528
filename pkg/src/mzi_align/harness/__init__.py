from .config import AppConfig, default_config, desk_scale_config  # noqa: F401
