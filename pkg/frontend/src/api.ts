import type {
  ErrorPayload,
  GenerateRequestBody,
  GenerateSuccess,
  UnrepairedPayload,
} from "./types";

export type FetchLike = (input: string, init: RequestInit) => Promise<Response>;

export type GenerateOutcome =
  | { kind: "ok"; payload: GenerateSuccess }
  | { kind: "unrepaired"; payload: UnrepairedPayload }
  | { kind: "error"; status: number; payload: ErrorPayload }
  | { kind: "network"; message: string };

export class ApiClient {
  constructor(
    private readonly fetchLike: FetchLike,
    private readonly baseUrl: string = "",
  ) {}

  async generate(body: GenerateRequestBody): Promise<GenerateOutcome> {
    let response: Response;
    try {
      response = await this.fetchLike(`${this.baseUrl}/api/generate`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      });
    } catch (exc) {
      return { kind: "network", message: String(exc) };
    }
    let payload: unknown;
    try {
      payload = await response.json();
    } catch {
      return {
        kind: "error",
        status: response.status,
        payload: { error: "bad_response", detail: "response body was not JSON" },
      };
    }
    if (response.ok) {
      return { kind: "ok", payload: payload as GenerateSuccess };
    }
    const error = payload as ErrorPayload;
    if (response.status === 422 && error.error === "exhausted_repairs") {
      return { kind: "unrepaired", payload: payload as UnrepairedPayload };
    }
    return { kind: "error", status: response.status, payload: error };
  }
}
