/** Typed client for the rewrite service HTTP API.
 *
 * The UI talks to the server only through this module, and only via the
 * three documented endpoints: GET /health, GET /languages, POST /translate.
 */

export interface TranslateRequest {
  text: string;
  source_lang: string;
  target_lang: string;
  target_style: string;
  beam?: number;
}

export interface TranslateResponse {
  output: string;
  score: number;
  tokens_in: number;
  tokens_out: number;
}

export interface LanguagesResponse {
  languages: string[];
  styles: string[];
}

export interface HealthResponse {
  status: string;
}

/** Non-2xx response; carries the parsed error body (e.g. available_styles). */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: Record<string, unknown>,
  ) {
    super(typeof body.error === "string" ? body.error : `HTTP ${status}`);
    this.name = "ApiError";
  }
}

async function parseJson(res: Response): Promise<Record<string, unknown>> {
  try {
    return (await res.json()) as Record<string, unknown>;
  } catch {
    return {};
  }
}

export class Client {
  constructor(readonly baseUrl: string) {}

  private async get<T>(path: string): Promise<T> {
    const res = await fetch(`${this.baseUrl}${path}`);
    const body = await parseJson(res);
    if (!res.ok) throw new ApiError(res.status, body);
    return body as T;
  }

  health(): Promise<HealthResponse> {
    return this.get<HealthResponse>("/health");
  }

  languages(): Promise<LanguagesResponse> {
    return this.get<LanguagesResponse>("/languages");
  }

  async translate(req: TranslateRequest): Promise<TranslateResponse> {
    const res = await fetch(`${this.baseUrl}/translate`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
    const body = await parseJson(res);
    if (!res.ok) throw new ApiError(res.status, body);
    return body as unknown as TranslateResponse;
  }
}
