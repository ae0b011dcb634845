import { ApiClient, SessionState } from "./api.js";
import { RunParams } from "./params.js";

export interface PollOptions {
  /** poll interval in ms (~4 Hz default) */
  intervalMs?: number;
  /** give up after this many ms */
  timeoutMs?: number;
  /** injectable sleep, for tests */
  sleep?: (ms: number) => Promise<void>;
  /** called with every polled state */
  onState?: (state: SessionState) => void;
}

const realSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

/**
 * Start a run and poll /state until it finishes.  Resolves with the final
 * state ("done" or "failed"); throws on timeout or transport errors.
 */
export async function runAndPoll(
  client: ApiClient,
  sessionId: string,
  params: RunParams,
  options: PollOptions = {},
): Promise<SessionState> {
  const interval = options.intervalMs ?? 250;
  const timeout = options.timeoutMs ?? 10 * 60 * 1000;
  const sleep = options.sleep ?? realSleep;
  await client.startRun(sessionId, params);
  let waited = 0;
  for (;;) {
    const state = await client.getState(sessionId);
    options.onState?.(state);
    if (state.status === "done" || state.status === "failed") return state;
    if (waited >= timeout) throw new Error("run polling timed out");
    await sleep(interval);
    waited += interval;
  }
}
