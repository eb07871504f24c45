/** Browser shell: join/resume, then render whatever screen the server's
 * state dictates and translate clicks into flow calls. All state lives on
 * the server; the only things kept here are credentials (localStorage) and
 * the currently highlighted-but-unconfirmed choice.
 */

import { ApiClient, ApiError, NetworkError } from "./api.js";
import { SubjectFlow } from "./flow.js";
import {
  renderScreen,
  validateLoc,
  validateSurvey,
  LOC_ANSWER_COUNT,
  SURVEY_ANSWER_COUNT,
} from "./screens.js";
import type { ClientView, SessionMode, Strategy, TradeAction } from "./types.js";

const STORE = {
  server: "ethgame.server",
  subject: "ethgame.subject",
  token: "ethgame.token",
  name: "ethgame.name",
};

const app = document.getElementById("app")!;
let flow: SubjectFlow | null = null;
let picked: string | null = null;
let pendingRetry: (() => Promise<void>) | null = null;

function setBanner(text: string | null, retry = false) {
  const el = document.getElementById("banner")!;
  if (!text) {
    el.hidden = true;
    el.innerHTML = "";
    return;
  }
  el.hidden = false;
  el.innerHTML = retry
    ? `${text} <button id="retry-btn">Retry</button>`
    : text;
  if (retry) {
    document.getElementById("retry-btn")!.addEventListener("click", () => {
      const job = pendingRetry;
      pendingRetry = null;
      setBanner("retrying…");
      if (job) void job();
    });
  }
}

/** Run a flow action; on network failure keep it (and the form input, which
 * lives in the DOM untouched) for the retry button. */
async function attempt(job: () => Promise<void>): Promise<void> {
  try {
    await job();
    setBanner(null);
  } catch (err) {
    if (err instanceof NetworkError) {
      pendingRetry = () => attempt(job);
      setBanner("Could not reach the server. Your input is still here.", true);
      return;
    }
    if (err instanceof ApiError) {
      showFormError(err.message);
      return;
    }
    throw err;
  }
}

function showFormError(message: string) {
  const slot = app.querySelector<HTMLElement>('[data-role="error"]');
  if (slot) {
    slot.textContent = message;
    slot.hidden = false;
  } else {
    setBanner(message);
  }
}

function collectLoc(): Array<boolean | null> {
  const answers: Array<boolean | null> = [];
  for (let i = 1; i <= LOC_ANSWER_COUNT; i++) {
    const checked = app.querySelector<HTMLInputElement>(
      `input[name="loc-${i}"]:checked`,
    );
    answers.push(checked ? checked.value === "true" : null);
  }
  return answers;
}

function collectSurvey(): Array<number | null> {
  const answers: Array<number | null> = [];
  for (let i = 1; i <= SURVEY_ANSWER_COUNT; i++) {
    const checked = app.querySelector<HTMLInputElement>(
      `input[name="q${i}"]:checked`,
    );
    answers.push(checked ? Number(checked.value) : null);
  }
  return answers;
}

function render(view: ClientView) {
  picked = null;
  app.innerHTML = renderScreen(view, flow?.locItems ?? []);
  const confirm = app.querySelector<HTMLButtonElement>('[data-act="confirm"]');
  const pickedLabel = app.querySelector<HTMLElement>('[data-role="picked"]');

  app.querySelectorAll<HTMLButtonElement>('[data-act="pick"]').forEach((btn) => {
    btn.addEventListener("click", () => {
      picked = btn.dataset.value ?? null;
      app
        .querySelectorAll('[data-act="pick"]')
        .forEach((b) => b.classList.toggle("picked", b === btn));
      if (pickedLabel) pickedLabel.textContent = btn.textContent ?? picked;
      if (confirm) confirm.disabled = false;
    });
  });

  confirm?.addEventListener("click", () => {
    if (!picked || !flow) return;
    const f = flow;
    const choice = picked;
    const act = view.allowed_actions[0];
    confirm.disabled = true;
    void attempt(async () => {
      let next: ClientView;
      if (act === "choose_strategy") {
        next = await f.chooseStrategy(choice as Strategy);
      } else if (act === "submit_decision") {
        next = await f.submitDecision(choice as TradeAction);
      } else if (act === "select_mode") {
        next = await f.selectMode(choice as SessionMode);
      } else {
        next = await f.refresh();
      }
      render(next);
    });
  });

  app
    .querySelector<HTMLButtonElement>('[data-act="open-session"]')
    ?.addEventListener("click", () => {
      void attempt(async () => render(await flow!.openSession()));
    });

  app
    .querySelector<HTMLButtonElement>('[data-act="submit-loc"]')
    ?.addEventListener("click", () => {
      const answers = collectLoc();
      const problem = validateLoc(answers);
      if (problem) {
        showFormError(problem); // nothing is sent until the form is whole
        return;
      }
      void attempt(async () =>
        render(await flow!.submitLoc(answers as boolean[])),
      );
    });

  app
    .querySelector<HTMLButtonElement>('[data-act="submit-survey"]')
    ?.addEventListener("click", () => {
      const answers = collectSurvey();
      const problem = validateSurvey(answers);
      if (problem) {
        showFormError(problem);
        return;
      }
      void attempt(async () =>
        render(await flow!.submitSurvey(answers as number[])),
      );
    });
}

function renderJoin(message?: string) {
  const server = localStorage.getItem(STORE.server) ?? "http://127.0.0.1:8000";
  const name = localStorage.getItem(STORE.name) ?? "";
  app.innerHTML = `<section class="screen screen-join">
  <h2>Join the game</h2>
  ${message ? `<p class="form-error">${message}</p>` : ""}
  <label>Server <input id="join-server" value="${server}"></label>
  <label>Your name <input id="join-name" value="${name}" maxlength="200"></label>
  <button id="join-btn">Join</button>
</section>`;
  document.getElementById("join-btn")!.addEventListener("click", () => {
    const serverUrl = (
      document.getElementById("join-server") as HTMLInputElement
    ).value.replace(/\/+$/, "");
    const subjectName = (document.getElementById("join-name") as HTMLInputElement)
      .value.trim();
    if (!subjectName) {
      renderJoin("a name is required");
      return;
    }
    void attempt(async () => {
      const api = new ApiClient(serverUrl);
      const reg = await api.register(subjectName);
      api.token = reg.token;
      localStorage.setItem(STORE.server, serverUrl);
      localStorage.setItem(STORE.name, subjectName);
      localStorage.setItem(STORE.subject, reg.subject_id);
      localStorage.setItem(STORE.token, reg.token);
      flow = new SubjectFlow(api, reg.subject_id);
      render(await flow.refresh());
    });
  });
}

async function renderInstructor(serverUrl: string, adminToken: string) {
  const api = new ApiClient(serverUrl);
  const draw = async () => {
    const { subjects } = await api.progress(adminToken);
    const rows = subjects
      .map(
        (s) =>
          `<tr><td>${s.subject_id}</td><td>${s.name}</td><td>${s.stage}</td>` +
          `<td>${s.treatment ?? ""}</td><td>${s.sessions_settled}/${s.sessions_started}</td></tr>`,
      )
      .join("");
    app.innerHTML = `<section class="screen screen-progress">
  <h2>Progress</h2>
  <table class="results">
    <thead><tr><th>ID</th><th>Name</th><th>Stage</th><th>Arm</th><th>Settled</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>
</section>`;
  };
  await attempt(draw);
  setInterval(() => void attempt(draw), 5000);
}

function boot() {
  const params = new URLSearchParams(location.search);
  const admin = params.get("admin");
  if (admin) {
    const server =
      params.get("server") ??
      localStorage.getItem(STORE.server) ??
      "http://127.0.0.1:8000";
    void renderInstructor(server.replace(/\/+$/, ""), admin);
    return;
  }

  const server = localStorage.getItem(STORE.server);
  const subject = localStorage.getItem(STORE.subject);
  const token = localStorage.getItem(STORE.token);
  if (server && subject && token) {
    const api = new ApiClient(server, { token });
    const resumed = new SubjectFlow(api, subject);
    resumed
      .refresh()
      .then((view) => {
        flow = resumed;
        render(view);
      })
      .catch((err) => {
        if (err instanceof NetworkError) {
          pendingRetry = async () => boot();
          setBanner("Could not reach the server.", true);
        } else {
          // token or subject no longer valid on this server; start over
          localStorage.removeItem(STORE.subject);
          localStorage.removeItem(STORE.token);
          renderJoin();
        }
      });
    return;
  }
  renderJoin();
}

boot();
