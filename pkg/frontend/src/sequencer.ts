/**
 * Request sequencing: a response is applied only if it answers the most
 * recently issued request of its channel.  This is what prevents a stale
 * "safe" answer from overpainting the flag of a newer, possibly colliding
 * slider state when responses arrive out of order.
 */
export class LatestOnly {
  private counter = 0;

  /** Mark a new request; returns its token. */
  issue(): number {
    this.counter += 1;
    return this.counter;
  }

  /** True when the token belongs to the newest issued request. */
  isCurrent(token: number): boolean {
    return token === this.counter;
  }

  get issued(): number {
    return this.counter;
  }
}

/** Simple trailing-edge throttle: at most one call per `intervalMs`, the
 * last suppressed call fires when the window closes. */
export function throttleTrailing<A extends unknown[]>(
  fn: (...args: A) => void,
  intervalMs: number,
  now: () => number = () => Date.now(),
  schedule: (cb: () => void, ms: number) => unknown = (cb, ms) => setTimeout(cb, ms),
): (...args: A) => void {
  let last = -Infinity;
  let pending: A | null = null;
  let timerArmed = false;

  const fire = (args: A) => {
    last = now();
    fn(...args);
  };

  return (...args: A) => {
    const dt = now() - last;
    if (dt >= intervalMs) {
      fire(args);
      return;
    }
    pending = args;
    if (!timerArmed) {
      timerArmed = true;
      schedule(() => {
        timerArmed = false;
        if (pending) {
          const p = pending;
          pending = null;
          fire(p);
        }
      }, intervalMs - dt);
    }
  };
}
