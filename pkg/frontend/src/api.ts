import type {
  Capabilities,
  FkResponse,
  MachineState,
  PlaybackFrame,
  VerificationReport,
} from "./types.js";

export class ServiceError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`service error ${status}: ${JSON.stringify(detail)}`);
  }
}

type FetchLike = typeof fetch;

export interface WebSocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev: unknown) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  onopen: ((ev: unknown) => void) | null;
}

export type WsFactory = (url: string) => WebSocketLike;

/** Typed client for the planner service; transport is injectable so tests
 * can run under node. */
export class ServiceClient {
  constructor(
    public baseUrl: string,
    private fetchImpl: FetchLike = fetch,
    private wsFactory: WsFactory = (url) =>
      new WebSocket(url) as unknown as WebSocketLike,
  ) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await res.json().catch(() => null);
    if (!res.ok) {
      throw new ServiceError(res.status, (payload as { detail?: unknown })?.detail ?? payload);
    }
    return payload as T;
  }

  capabilities(): Promise<Capabilities> {
    return this.call("GET", "/capabilities");
  }

  fk(state: MachineState): Promise<FkResponse> {
    return this.call("POST", "/fk", { state });
  }

  verifyTrajectory(trajectory: string, mode: "stepped" | "continuous"): Promise<VerificationReport> {
    return this.call("POST", "/trajectory/verify", { trajectory, mode });
  }

  openPlayback(trajectory: string, dt: number, pace = true): PlaybackStream {
    const url = this.baseUrl.replace(/^http/, "ws") + "/playback";
    return new PlaybackStream(this.wsFactory(url), trajectory, dt, pace);
  }
}

/** Control surface of one /playback stream. */
export class PlaybackStream {
  onFrame: ((f: PlaybackFrame) => void) | null = null;
  onError: ((message: string) => void) | null = null;
  onClose: (() => void) | null = null;

  constructor(
    private ws: WebSocketLike,
    trajectory: string,
    dt: number,
    pace: boolean,
  ) {
    ws.onopen = () => ws.send(JSON.stringify({ trajectory, dt, pace }));
    ws.onmessage = (ev) => {
      const msg = JSON.parse(String(ev.data));
      if (msg.error !== undefined) {
        this.onError?.(String(msg.error));
        return;
      }
      this.onFrame?.(msg as PlaybackFrame);
    };
    ws.onclose = () => this.onClose?.();
    ws.onerror = () => this.onError?.("playback socket error");
  }

  pause(): void {
    this.ws.send(JSON.stringify({ cmd: "pause" }));
  }

  resume(): void {
    this.ws.send(JSON.stringify({ cmd: "resume" }));
  }

  seek(t: number): void {
    this.ws.send(JSON.stringify({ cmd: "seek_time", t }));
  }

  close(): void {
    this.ws.close();
  }
}
