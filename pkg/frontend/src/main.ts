// Bootstrap: one session per tab, driven entirely through the controller.

import { SessionApi } from "./api.js";
import { TrialController } from "./controller.js";
import { PlaygroundView } from "./ui.js";

const params = new URLSearchParams(window.location.search);
const apiBase = params.get("api") ?? "http://127.0.0.1:8000";
const preset = params.get("preset") ?? "exp2";
const seed = Number(params.get("seed") ?? Math.floor(Math.random() * 1e9));
const analytics = params.get("analytics") === "on";

const api = new SessionApi(apiBase);
const controller = new TrialController(api);
const root = document.getElementById("app")!;
const view = new PlaygroundView(root, controller, () => view.render());

controller
  .start({ preset, seed, analytics })
  .then(() => view.render())
  .catch((err) => {
    root.textContent = `could not reach the session service at ${apiBase}: ${err}`;
  });
