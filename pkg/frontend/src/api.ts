// Thin fetch layer over the run service. Errors never throw past here; the
// caller gets { ok, error } and surfaces 4xx messages inline.

import type { CueJson, RunEvent, StateSnapshot } from "./types.js";

export interface ApiResult<T> {
  ok: boolean;
  value?: T;
  error?: string;
}

async function post(path: string, body: unknown): Promise<ApiResult<unknown>> {
  try {
    const response = await fetch(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      return { ok: false, error: payload.error ?? `HTTP ${response.status}` };
    }
    return { ok: true, value: payload };
  } catch (err) {
    return { ok: false, error: String(err) };
  }
}

export async function getState(): Promise<ApiResult<StateSnapshot>> {
  try {
    const response = await fetch("/state");
    if (!response.ok) return { ok: false, error: `HTTP ${response.status}` };
    return { ok: true, value: (await response.json()) as StateSnapshot };
  } catch (err) {
    return { ok: false, error: String(err) };
  }
}

export function postCommand(text: string) {
  return post("/command", { text });
}

export function postCue(cue: CueJson) {
  return post("/cue", cue);
}

export function postControl(mode: "run" | "pause" | "step", ticks = 1) {
  return post("/control", { mode, ticks });
}

export interface StreamHandle {
  stop: () => void;
}

/** Tail the event stream from `from`, invoking `onEvent` per line in order.
 * `onEnd` fires when the stream closes (finished run or connection loss). */
export function streamEvents(
  from: number,
  onEvent: (event: RunEvent) => void,
  onEnd: (error?: string) => void,
): StreamHandle {
  const controller = new AbortController();
  (async () => {
    try {
      const response = await fetch(`/events?from=${from}`, {
        signal: controller.signal,
      });
      if (!response.ok || !response.body) {
        onEnd(`HTTP ${response.status}`);
        return;
      }
      const reader = response.body.getReader();
      const decoder = new TextDecoder();
      let pending = "";
      for (;;) {
        const { done, value } = await reader.read();
        if (done) break;
        pending += decoder.decode(value, { stream: true });
        let cut;
        while ((cut = pending.indexOf("\n")) >= 0) {
          const line = pending.slice(0, cut).trim();
          pending = pending.slice(cut + 1);
          if (line) onEvent(JSON.parse(line) as RunEvent);
        }
      }
      onEnd();
    } catch (err) {
      if (!controller.signal.aborted) onEnd(String(err));
    }
  })();
  return { stop: () => controller.abort() };
}
