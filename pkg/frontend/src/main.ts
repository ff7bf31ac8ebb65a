import { LoomApi } from "./api.js";
import { createApp } from "./app.js";

// Served from the session service itself (loom serve --ui-dir), so the API
// lives at the same origin.
window.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("app");
  if (root) {
    void createApp(root, new LoomApi(""));
  }
});
