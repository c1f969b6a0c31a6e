import type { ServiceClient } from "./api.js";
import { LatestOnly } from "./sequencer.js";
import type { FkResponse, MachineState, VerificationReport } from "./types.js";
import { HOME_STATE } from "./types.js";

/** Tri-state collision display: never "safe" unless the newest request's
 * answer said so. */
export type CollisionDisplay = "safe" | "colliding" | "unknown" | "pending";

export interface ViewSnapshot {
  state: MachineState;
  display: CollisionDisplay;
  fk: FkResponse | null;
  report: VerificationReport | null;
  playbackTime: number | null;
  serviceLost: boolean;
}

/**
 * Holds what the screen shows.  All /fk traffic funnels through here so
 * the stale-response guard is enforced in one place: a response updates
 * the view only when it answers the latest issued request, and issuing a
 * new request immediately demotes the display to "pending".
 */
export class ViewModel {
  private seq = new LatestOnly();
  private snapshot: ViewSnapshot = {
    state: { ...HOME_STATE },
    display: "unknown",
    fk: null,
    report: null,
    playbackTime: null,
    serviceLost: false,
  };
  private listeners = new Set<(s: ViewSnapshot) => void>();

  constructor(private client: ServiceClient) {}

  subscribe(fn: (s: ViewSnapshot) => void): () => void {
    this.listeners.add(fn);
    fn(this.snapshot);
    return () => this.listeners.delete(fn);
  }

  get current(): ViewSnapshot {
    return this.snapshot;
  }

  private emit(patch: Partial<ViewSnapshot>): void {
    this.snapshot = { ...this.snapshot, ...patch };
    for (const fn of this.listeners) fn(this.snapshot);
  }

  /** Issue a kinematics/collision request for a new control state.
   * Returns the promise of whether this particular request got applied. */
  async setState(state: MachineState): Promise<boolean> {
    const token = this.seq.issue();
    // the previous flag no longer describes the displayed state
    this.emit({ state: { ...state }, display: "pending" });
    let fk: FkResponse;
    try {
      fk = await this.client.fk(state);
    } catch (err) {
      if (this.seq.isCurrent(token)) {
        this.emit({ serviceLost: this.isTransportError(err), display: "unknown" });
      }
      return false;
    }
    if (!this.seq.isCurrent(token)) {
      return false; // stale: a newer state owns the screen
    }
    this.emit({
      fk,
      serviceLost: false,
      display: fk.colliding === null ? "unknown" : fk.colliding ? "colliding" : "safe",
    });
    return true;
  }

  private isTransportError(err: unknown): boolean {
    return !(err instanceof Object && "status" in (err as object));
  }

  async verify(text: string, mode: "stepped" | "continuous"): Promise<VerificationReport> {
    const report = await this.client.verifyTrajectory(text, mode);
    this.emit({ report });
    return report;
  }

  setPlaybackTime(t: number | null): void {
    this.emit({ playbackTime: t });
  }

  markServiceLost(): void {
    this.emit({ serviceLost: true, display: "unknown" });
  }

  async retry(): Promise<void> {
    try {
      await this.client.capabilities();
      this.emit({ serviceLost: false });
      await this.setState(this.snapshot.state);
    } catch {
      this.emit({ serviceLost: true });
    }
  }
}
