// Wire types mirroring the service API (docs/service-api.md).

export interface MachineState {
  moving_az: number;
  moving_coel: number;
  static_coel: number;
  turntable: number;
  pol_tx: number;
  pol_rx: number;
  radial_tx: number;
  radial_rx: number;
}

export const AXES: (keyof MachineState)[] = [
  "moving_az",
  "moving_coel",
  "static_coel",
  "turntable",
  "pol_tx",
  "pol_rx",
  "radial_tx",
  "radial_rx",
];

export const HOME_STATE: MachineState = {
  moving_az: 0,
  moving_coel: 0,
  static_coel: 0,
  turntable: 0,
  pol_tx: 0,
  pol_rx: 0,
  radial_tx: 3.44,
  radial_rx: 3.44,
};

export interface Capabilities {
  version: string;
  axes: Record<string, [number, number] | null>;
  config: {
    focal_height: number;
    boom_radius_nominal: number;
    probe_aperture_radius: number;
    turntable_diameter: number;
    clearance: number;
  };
  collision_enabled: boolean;
  table: null | {
    geometry_hash: string;
    grids: Record<string, { min: number; max: number; step: number; n: number }>;
    colliding_fraction: number;
  };
  scenes: string[];
}

/** Oriented box: center, half extents, and three unit axis columns. */
export interface Box {
  center: [number, number, number];
  half_extents: [number, number, number];
  axes: [number, number, number][];
}

export interface ProbePose {
  position: [number, number, number];
  boresight: [number, number, number];
  e_co: [number, number, number];
  e_cx: [number, number, number];
}

export interface FkResponse {
  tx: ProbePose;
  rx: ProbePose;
  bistatic: {
    phi_ill: number;
    theta_ill: number;
    phi_obs: number;
    theta_obs: number;
    pol_ill: number;
    pol_obs: number;
    r_ill: number;
    r_obs: number;
  };
  colliding: boolean | null;
  boxes: { tx: Box[]; rx: Box[] };
}

export interface Violation {
  waypoint_index: number;
  time_s: number;
  kind: "collision" | "limit";
  detail: string;
}

export interface VerificationReport {
  accepted: boolean;
  mode: string;
  n_waypoints: number;
  total_duration_s: number;
  per_step_overhead_s: number;
  detour: Record<string, number>;
  first_violation?: Violation;
}

export interface PlaybackFrame {
  t: number;
  state: MachineState;
  velocities: Record<string, number>;
  colliding: boolean | null;
  done: boolean;
}
