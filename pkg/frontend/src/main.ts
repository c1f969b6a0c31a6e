import { PlaybackStream, ServiceClient } from "./api.js";
import { PlaybackController } from "./playback.js";
import { renderSvg } from "./render.js";
import { throttleTrailing } from "./sequencer.js";
import type { Capabilities, MachineState, VerificationReport } from "./types.js";
import { AXES, HOME_STATE } from "./types.js";
import { ViewModel } from "./viewmodel.js";

const SLIDER_MAX_HZ = 20;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function fmtDetour(detour: Record<string, number>): string {
  const items = Object.entries(detour)
    .filter(([, v]) => v !== 1.0)
    .map(([k, v]) => `${k}: ${Number.isFinite(v) ? v.toFixed(2) : "inf"}`);
  return items.length ? items.join(", ") : "all axes direct";
}

function reportHtml(r: VerificationReport): string {
  const head = r.accepted
    ? `<div class="banner ok">accepted</div>`
    : `<div class="banner bad">rejected - ${r.first_violation?.kind} at waypoint ` +
      `${r.first_violation?.waypoint_index} (t=${r.first_violation?.time_s.toFixed(2)} s)</div>`;
  return (
    head +
    `<dl><dt>waypoints</dt><dd>${r.n_waypoints}</dd>` +
    `<dt>duration</dt><dd>${r.total_duration_s.toFixed(2)} s ` +
    `(incl. ${r.per_step_overhead_s * 1000} ms/step in ${r.mode} mode)</dd>` +
    `<dt>detour</dt><dd>${fmtDetour(r.detour)}</dd></dl>`
  );
}

async function boot(): Promise<void> {
  const base = (window as unknown as { BIRANGE_URL?: string }).BIRANGE_URL ?? "";
  const client = new ServiceClient(base || `${location.protocol}//${location.host}`);
  const vm = new ViewModel(client);

  let caps: Capabilities;
  try {
    caps = await client.capabilities();
  } catch {
    el("banner").textContent = "service unreachable - start `birange serve` and reload";
    el("banner").className = "banner bad";
    return;
  }

  const state: MachineState = { ...HOME_STATE };
  const sliders = el<HTMLDivElement>("sliders");
  const pushState = throttleTrailing(
    (s: MachineState) => void vm.setState({ ...s }),
    1000 / SLIDER_MAX_HZ,
  );

  for (const axis of AXES) {
    const lim = caps.axes[axis];
    const row = document.createElement("label");
    row.className = "axis";
    const name = document.createElement("span");
    name.textContent = axis;
    const input = document.createElement("input");
    input.type = "range";
    const [lo, hi] = lim ?? [-180, 180];
    input.min = String(lo);
    input.max = String(hi);
    input.step = axis.startsWith("radial") ? "0.001" : "0.5";
    input.value = String(state[axis]);
    const value = document.createElement("output");
    value.textContent = String(state[axis]);
    input.addEventListener("input", () => {
      state[axis] = Number(input.value);
      value.textContent = input.value;
      pushState(state);
    });
    row.append(name, input, value);
    sliders.append(row);
  }

  vm.subscribe((snap) => {
    el("view-top").innerHTML = renderSvg(snap.fk, snap.display, caps, "top");
    el("view-side").innerHTML = renderSvg(snap.fk, snap.display, caps, "side");
    const banner = el("banner");
    if (snap.serviceLost) {
      banner.textContent = "service lost - controls disabled";
      banner.className = "banner bad";
      sliders.classList.add("disabled");
    } else {
      sliders.classList.remove("disabled");
      banner.className = `banner ${snap.display}`;
      banner.textContent =
        snap.display === "colliding"
          ? "COLLISION - bounding boxes intersect"
          : snap.display === "safe"
            ? "clear"
            : snap.display;
    }
    if (snap.fk) {
      const b = snap.fk.bistatic;
      el("bistatic").textContent =
        `ill (${b.phi_ill.toFixed(1)}°, ${b.theta_ill.toFixed(1)}°)  ` +
        `obs (${b.phi_obs.toFixed(1)}°, ${b.theta_obs.toFixed(1)}°)  ` +
        `pol (${b.pol_ill.toFixed(1)}°, ${b.pol_obs.toFixed(1)}°)`;
    }
    if (snap.report) el("report").innerHTML = reportHtml(snap.report);
  });

  el<HTMLButtonElement>("retry").addEventListener("click", () => void vm.retry());

  // trajectory upload + verification
  let lastTrajectory = "";
  el<HTMLInputElement>("traj-file").addEventListener("change", async (ev) => {
    const input = ev.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    lastTrajectory = await file.text();
    const mode = el<HTMLSelectElement>("mode").value as "stepped" | "continuous";
    try {
      await vm.verify(lastTrajectory, mode);
    } catch (err) {
      el("report").innerHTML =
        `<div class="banner bad">verification failed: ${String(err)}</div>`;
    }
  });

  // playback with pause/scrub
  let controller: PlaybackController | null = null;
  el<HTMLButtonElement>("play").addEventListener("click", () => {
    if (!lastTrajectory) return;
    controller?.close();
    const stream: PlaybackStream = client.openPlayback(lastTrajectory, 0.05, true);
    controller = new PlaybackController(stream);
    controller.subscribe((v) => {
      if (v.frame) {
        void vm.setState(v.frame.state);
        vm.setPlaybackTime(v.frame.t);
        el<HTMLInputElement>("scrub").value = String(v.frame.t);
        el("playback-time").textContent = `${v.frame.t.toFixed(2)} s${v.finished ? " (end)" : ""}`;
      }
      if (v.error) el("playback-time").textContent = `playback error: ${v.error}`;
    });
  });
  el<HTMLButtonElement>("pause").addEventListener("click", () => controller?.pause());
  el<HTMLButtonElement>("resume").addEventListener("click", () => controller?.resume());
  el<HTMLInputElement>("scrub").addEventListener("input", (ev) => {
    controller?.scrub(Number((ev.target as HTMLInputElement).value));
  });

  await vm.setState(state);
}

void boot();
