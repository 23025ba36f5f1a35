import { mountConsole } from "./app.js";
import { HttpClient } from "./client.js";

const root = document.getElementById("app");
if (root) {
  const audit = mountConsole(root, new HttpClient(""), {
    onSessionChange: (id) => {
      window.location.hash = id;
    },
  });
  const id = window.location.hash.replace(/^#/, "");
  if (id) void audit.load(id);
}
