/** DOM wiring for the demo page. All state lives in a SessionView; every
 * server interaction goes through the typed Client. */

import { Client } from "./api.js";
import { renderDiff, tokenize } from "./diff.js";
import { canSubmit, emptySession, isMonolingual, setTags, submit } from "./session.js";

const baseUrl =
  new URLSearchParams(window.location.search).get("server") ?? "http://127.0.0.1:8100";
const client = new Client(baseUrl);
const view = emptySession();

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el as T;
};

const inputEl = $<HTMLTextAreaElement>("input");
const sourceEl = $<HTMLSelectElement>("source-lang");
const targetEl = $<HTMLSelectElement>("target-lang");
const styleEl = $<HTMLSelectElement>("style");
const submitEl = $<HTMLButtonElement>("submit");
const errorEl = $<HTMLElement>("error");
const resultEl = $<HTMLElement>("result");
const historyEl = $<HTMLElement>("history");

function fillSelect(el: HTMLSelectElement, values: string[], current: string): void {
  el.innerHTML = "";
  for (const v of values) {
    const opt = document.createElement("option");
    opt.value = v;
    opt.textContent = v;
    opt.selected = v === current;
    el.appendChild(opt);
  }
}

function render(): void {
  fillSelect(sourceEl, view.languages, view.sourceLang);
  fillSelect(targetEl, view.languages, view.targetLang);
  fillSelect(styleEl, view.styles, view.style);
  submitEl.disabled = !canSubmit(view);
  submitEl.textContent = view.pending ? "Rewriting…" : "Rewrite";
  errorEl.textContent = view.error ?? "";
  errorEl.hidden = view.error === null;

  if (view.last === null) {
    resultEl.innerHTML = "";
  } else {
    const { request, response } = view.last;
    if (request.source_lang === request.target_lang) {
      resultEl.innerHTML = `<div class="diff">${renderDiff(
        tokenize(request.text),
        tokenize(response.output),
      )}</div>`;
    } else {
      const esc = (s: string) => s.replace(/&/g, "&amp;").replace(/</g, "&lt;");
      resultEl.innerHTML =
        `<div class="side"><div>${esc(request.text)}</div>` +
        `<div>${esc(response.output)}</div></div>`;
    }
    const meta = document.createElement("p");
    meta.className = "meta";
    meta.textContent =
      `score ${response.score.toFixed(3)} · ` +
      `${response.tokens_in} → ${response.tokens_out} tokens`;
    resultEl.appendChild(meta);
  }

  historyEl.innerHTML = "";
  for (const entry of [...view.history].reverse()) {
    const li = document.createElement("li");
    li.textContent =
      `[${entry.request.source_lang}→${entry.request.target_lang}` +
      `/${entry.request.target_style}] ${entry.request.text} ⇒ ${entry.response.output}`;
    historyEl.appendChild(li);
  }
}

inputEl.addEventListener("input", () => {
  view.input = inputEl.value;
  submitEl.disabled = !canSubmit(view);
});
sourceEl.addEventListener("change", () => {
  view.sourceLang = sourceEl.value;
});
targetEl.addEventListener("change", () => {
  view.targetLang = targetEl.value;
});
styleEl.addEventListener("change", () => {
  view.style = styleEl.value;
});
submitEl.addEventListener("click", async () => {
  await submit(view, client);
  render();
});

async function init(): Promise<void> {
  try {
    const tags = await client.languages();
    setTags(view, tags.languages, tags.styles);
  } catch (err) {
    view.error = `cannot reach server at ${baseUrl}: ${
      err instanceof Error ? err.message : String(err)
    }`;
  }
  render();
}

void init();
export { view, isMonolingual };
