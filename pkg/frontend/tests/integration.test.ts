// End-to-end acceptance against the real local service (spawned in
// global-setup): slider-to-flag latency, the marked collision state
// rendering red, trajectory verification banners, and playback landing
// exactly on the target waypoint.

import { beforeAll, describe, expect, it } from "vitest";
import { WebSocket as NodeWebSocket } from "ws";

import { ServiceClient, type WebSocketLike } from "../src/api.js";
import { PlaybackController } from "../src/playback.js";
import { renderSvg } from "../src/render.js";
import type { Capabilities, MachineState, PlaybackFrame } from "../src/types.js";
import { HOME_STATE } from "../src/types.js";
import { ViewModel } from "../src/viewmodel.js";

const BASE = process.env.BIRANGE_TEST_URL ?? "http://127.0.0.1:58731";

const wsFactory = (url: string): WebSocketLike =>
  new NodeWebSocket(url) as unknown as WebSocketLike;

const client = new ServiceClient(BASE, fetch, wsFactory);

// the collision-table slice figure marks this state as colliding
const MARKED: MachineState = {
  ...HOME_STATE,
  moving_az: -70,
  moving_coel: -60,
  static_coel: 60,
};

const FREE_A: MachineState = { ...HOME_STATE, moving_az: 40, moving_coel: 30, static_coel: 61 };
const FREE_B: MachineState = { ...HOME_STATE, moving_az: 52, moving_coel: 30, static_coel: 61 };

function toTraj(states: MachineState[]): string {
  return states
    .map((s) =>
      [
        s.moving_az, s.moving_coel, s.static_coel, s.turntable,
        s.pol_tx, s.pol_rx, s.radial_tx, s.radial_rx,
      ].join(" "),
    )
    .join("\n") + "\n";
}

let caps: Capabilities;

beforeAll(async () => {
  caps = await client.capabilities();
});

describe("capabilities", () => {
  it("reports limits and an active collision table", () => {
    expect(caps.axes.moving_az).toEqual([-118, 66]);
    expect(caps.collision_enabled).toBe(true);
    expect(caps.config.turntable_diameter).toBeCloseTo(6.5);
  });
});

describe("slider round trip", () => {
  it("collision flag answer arrives well under the 100 ms budget", async () => {
    await client.fk(HOME_STATE); // warm the connection
    const t0 = performance.now();
    const fk = await client.fk(MARKED);
    const dt = performance.now() - t0;
    expect(fk.colliding).toBe(true);
    expect(dt).toBeLessThan(100);
  });

  it("marked collision state renders the gantries red", async () => {
    const vm = new ViewModel(client);
    const applied = await vm.setState(MARKED);
    expect(applied).toBe(true);
    expect(vm.current.display).toBe("colliding");
    const svg = renderSvg(vm.current.fk, vm.current.display, caps, "top");
    expect(svg).toContain('fill="#d62828"');
    expect((svg.match(/<polygon/g) ?? []).length).toBeGreaterThan(5);
  });

  it("free state renders without red", async () => {
    const vm = new ViewModel(client);
    await vm.setState(FREE_A);
    expect(vm.current.display).toBe("safe");
    const svg = renderSvg(vm.current.fk, vm.current.display, caps, "top");
    expect(svg).not.toContain("#d62828");
  });
});

describe("trajectory verification", () => {
  it("free two-waypoint plan is accepted with duration and detour", async () => {
    const vm = new ViewModel(client);
    const report = await vm.verify(toTraj([FREE_A, FREE_B]), "stepped");
    expect(report.accepted).toBe(true);
    expect(report.total_duration_s).toBeGreaterThan(0.2);
    expect(report.detour.moving_az).toBe(1.0);
  });

  it("known-colliding plan is rejected naming the waypoint", async () => {
    const report = await client.verifyTrajectory(
      toTraj([FREE_A, { ...FREE_A, moving_az: -40 }]),
      "stepped",
    );
    expect(report.accepted).toBe(false);
    expect(report.first_violation?.kind).toBe("collision");
    expect(report.first_violation?.waypoint_index).toBe(1);
  });

  it("syntax errors surface the line number", async () => {
    await expect(client.verifyTrajectory("1 2 3\n", "stepped")).rejects.toMatchObject({
      status: 400,
      detail: expect.objectContaining({ line: 1 }),
    });
  });
});

describe("playback", () => {
  it("cursor ends exactly on the target waypoint and matches /fk", async () => {
    const stream = client.openPlayback(toTraj([FREE_A, FREE_B]), 0.01, false);
    const controller = new PlaybackController(stream);
    const last = await new Promise<PlaybackFrame>((resolve, reject) => {
      controller.subscribe((v) => {
        if (v.error) reject(new Error(v.error));
        if (v.finished && v.frame) resolve(v.frame);
      });
      setTimeout(() => reject(new Error("no final frame")), 20_000);
    });
    expect(last.state.moving_az).toBe(FREE_B.moving_az);
    expect(last.state.moving_coel).toBe(FREE_B.moving_coel);
    expect(last.colliding).toBe(false);
    const fkFinal = await client.fk(last.state);
    const fkTarget = await client.fk(FREE_B);
    expect(fkFinal.tx.position).toEqual(fkTarget.tx.position);
    controller.close();
  });

  it("pause stops the paced stream and resume continues it", async () => {
    const stream = client.openPlayback(toTraj([FREE_A, FREE_B]), 0.05, true);
    const controller = new PlaybackController(stream);
    const frames: PlaybackFrame[] = [];
    controller.subscribe((v) => {
      if (v.frame && frames[frames.length - 1] !== v.frame) frames.push(v.frame);
    });
    await new Promise((r) => setTimeout(r, 300));
    controller.pause();
    await new Promise((r) => setTimeout(r, 200));
    const atPause = frames.length;
    await new Promise((r) => setTimeout(r, 400));
    expect(frames.length - atPause).toBeLessThanOrEqual(2); // in-flight only
    controller.resume();
    await new Promise((r) => setTimeout(r, 400));
    expect(frames.length).toBeGreaterThan(atPause + 2);
    controller.close();
  });
});
