import type { PlaybackStream } from "./api.js";
import type { MachineState, PlaybackFrame } from "./types.js";

export interface PlaybackView {
  frame: PlaybackFrame | null;
  playing: boolean;
  finished: boolean;
  error: string | null;
}

/** Client-side state of one playback session: frame cursor, pause and
 * scrub controls, completion and error tracking. */
export class PlaybackController {
  private view: PlaybackView = { frame: null, playing: false, finished: false, error: null };
  private listeners = new Set<(v: PlaybackView) => void>();

  constructor(private stream: PlaybackStream) {
    this.view.playing = true;
    stream.onFrame = (f) => {
      this.view = { ...this.view, frame: f, finished: f.done };
      this.emit();
    };
    stream.onError = (message) => {
      this.view = { ...this.view, error: message, playing: false };
      this.emit();
    };
    stream.onClose = () => {
      this.view = { ...this.view, playing: false };
      this.emit();
    };
  }

  subscribe(fn: (v: PlaybackView) => void): () => void {
    this.listeners.add(fn);
    fn(this.view);
    return () => this.listeners.delete(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn(this.view);
  }

  get current(): PlaybackView {
    return this.view;
  }

  get currentState(): MachineState | null {
    return this.view.frame?.state ?? null;
  }

  pause(): void {
    this.stream.pause();
    this.view = { ...this.view, playing: false };
    this.emit();
  }

  resume(): void {
    this.stream.resume();
    this.view = { ...this.view, playing: true };
    this.emit();
  }

  scrub(t: number): void {
    this.stream.seek(t);
  }

  close(): void {
    this.stream.close();
  }
}
