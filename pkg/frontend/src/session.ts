/** Single-user session state: selections, last response, append-only history. */

import { ApiError, TranslateRequest, TranslateResponse } from "./api.js";

export interface HistoryEntry {
  request: TranslateRequest;
  response: TranslateResponse;
}

export interface SessionView {
  input: string;
  sourceLang: string;
  targetLang: string;
  style: string;
  languages: string[]; // populated from GET /languages only
  styles: string[];
  pending: boolean;
  error: string | null;
  last: HistoryEntry | null;
  history: HistoryEntry[];
}

/** The one server capability submit() needs; the real Client satisfies it. */
export interface TranslateApi {
  translate(req: TranslateRequest): Promise<TranslateResponse>;
}

export function emptySession(): SessionView {
  return {
    input: "",
    sourceLang: "",
    targetLang: "",
    style: "",
    languages: [],
    styles: [],
    pending: false,
    error: null,
    last: null,
    history: [],
  };
}

export function setTags(view: SessionView, languages: string[], styles: string[]): void {
  view.languages = [...languages];
  view.styles = [...styles];
  if (!languages.includes(view.sourceLang)) view.sourceLang = languages[0] ?? "";
  if (!languages.includes(view.targetLang)) view.targetLang = languages[0] ?? "";
  if (!styles.includes(view.style)) view.style = styles[0] ?? "";
}

/** Submit is allowed only with text typed, tags chosen and no request in flight. */
export function canSubmit(view: SessionView): boolean {
  return (
    view.input.trim().length > 0 &&
    view.sourceLang !== "" &&
    view.targetLang !== "" &&
    view.style !== "" &&
    !view.pending
  );
}

/** Monolingual requests get an inline diff; cross-lingual output is shown
 * side by side (tokens of different languages do not align). */
export function isMonolingual(view: SessionView): boolean {
  return view.sourceLang === view.targetLang;
}

export async function submit(view: SessionView, api: TranslateApi): Promise<void> {
  if (!canSubmit(view)) return;
  const request: TranslateRequest = {
    text: view.input,
    source_lang: view.sourceLang,
    target_lang: view.targetLang,
    target_style: view.style,
  };
  view.pending = true;
  view.error = null;
  try {
    const response = await api.translate(request);
    const entry: HistoryEntry = { request, response };
    view.last = entry;
    view.history.push(entry); // append-only; input is kept for iteration
  } catch (err) {
    // surface the failure inline without clearing the input
    if (err instanceof ApiError) {
      view.error = err.message;
    } else {
      view.error = err instanceof Error ? err.message : String(err);
    }
  } finally {
    view.pending = false;
  }
}
