import { describe, expect, it } from "vitest";

import { ApiClient, type FetchLike } from "../src/api";
import type { GenerateRequestBody } from "../src/types";
import { jsonResponse, successPayload, unrepairedPayload } from "./fixtures";

const BODY: GenerateRequestBody = {
  code: "class A {}",
  query: "what is here?",
  level: "medium",
  mode: "finetuned",
};

interface RecordedCall {
  input: string;
  init: RequestInit;
}

function recordingFetch(
  respond: () => Response | Promise<Response>,
): { calls: RecordedCall[]; fetchLike: FetchLike } {
  const calls: RecordedCall[] = [];
  const fetchLike: FetchLike = async (input, init) => {
    calls.push({ input, init });
    return respond();
  };
  return { calls, fetchLike };
}

describe("ApiClient.generate", () => {
  it("posts the JSON body to /api/generate", async () => {
    const { calls, fetchLike } = recordingFetch(() => jsonResponse(200, successPayload()));
    await new ApiClient(fetchLike).generate(BODY);
    expect(calls).toHaveLength(1);
    expect(calls[0].input).toBe("/api/generate");
    expect(calls[0].init.method).toBe("POST");
    expect((calls[0].init.headers as Record<string, string>)["Content-Type"]).toBe(
      "application/json",
    );
    expect(JSON.parse(calls[0].init.body as string)).toEqual(BODY);
  });

  it("prefixes the base url when one is configured", async () => {
    const { calls, fetchLike } = recordingFetch(() => jsonResponse(200, successPayload()));
    await new ApiClient(fetchLike, "http://127.0.0.1:8080").generate(BODY);
    expect(calls[0].input).toBe("http://127.0.0.1:8080/api/generate");
  });

  it("maps a 200 response to an ok outcome", async () => {
    const payload = successPayload();
    const { fetchLike } = recordingFetch(() => jsonResponse(200, payload));
    const outcome = await new ApiClient(fetchLike).generate(BODY);
    expect(outcome.kind).toBe("ok");
    if (outcome.kind === "ok") {
      expect(outcome.payload).toEqual(payload);
    }
  });

  it("maps a 422 exhausted_repairs response to an unrepaired outcome", async () => {
    const payload = unrepairedPayload();
    const { fetchLike } = recordingFetch(() => jsonResponse(422, payload));
    const outcome = await new ApiClient(fetchLike).generate(BODY);
    expect(outcome.kind).toBe("unrepaired");
    if (outcome.kind === "unrepaired") {
      expect(outcome.payload.attempts).toBe(3);
      expect(outcome.payload.best.graph?.nodes).toHaveLength(4);
    }
  });

  it("maps other 4xx responses to error outcomes", async () => {
    const { fetchLike } = recordingFetch(() =>
      jsonResponse(400, { error: "bad_request", detail: "query must be non-empty" }),
    );
    const outcome = await new ApiClient(fetchLike).generate(BODY);
    expect(outcome).toEqual({
      kind: "error",
      status: 400,
      payload: { error: "bad_request", detail: "query must be non-empty" },
    });
  });

  it("keeps a non-exhausted 422 as a plain error", async () => {
    const { fetchLike } = recordingFetch(() =>
      jsonResponse(422, { error: "non_drawable", detail: "package recursion" }),
    );
    const outcome = await new ApiClient(fetchLike).generate(BODY);
    expect(outcome.kind).toBe("error");
  });

  it("maps a thrown fetch to a network outcome", async () => {
    const fetchLike: FetchLike = async () => {
      throw new TypeError("connect ECONNREFUSED");
    };
    const outcome = await new ApiClient(fetchLike).generate(BODY);
    expect(outcome.kind).toBe("network");
    if (outcome.kind === "network") {
      expect(outcome.message).toContain("ECONNREFUSED");
    }
  });

  it("flags a non-JSON body as a bad response", async () => {
    const { fetchLike } = recordingFetch(
      () => new Response("<html>oops</html>", { status: 200 }),
    );
    const outcome = await new ApiClient(fetchLike).generate(BODY);
    expect(outcome).toEqual({
      kind: "error",
      status: 200,
      payload: { error: "bad_response", detail: "response body was not JSON" },
    });
  });
});
