import { ConsoleUI } from "./ui.js";

window.addEventListener("DOMContentLoaded", () => {
  new ConsoleUI();
});
