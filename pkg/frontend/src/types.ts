// Wire types mirroring the qbench service payloads.

export type Vec3 = [number, number, number];

export interface ServerEvent {
  seq: number;
  kind:
    | "photon_emitted"
    | "segment_traversed"
    | "plate_crossed"
    | "detection"
    | "herald"
    | "param_changed"
    | "batch";
  shot?: number | null;
  paths?: string[];
  state?: Record<string, Vec3> | null;
  link?: string;
  component?: string;
  bloch?: Vec3 | null;
  detector?: string;
  clicks?: number;
  ok?: boolean;
  pattern?: string;
  param?: string;
  value?: unknown;
  shots?: number;
  per_detector?: Record<string, number>;
}

export interface SceneComponent {
  id: string;
  kind: string;
  params: Record<string, unknown>;
  angle_step_deg: number;
}

export interface SceneDoc {
  schema_version: string;
  components: SceneComponent[];
  links: { from: string; to: string }[];
  sources: string[];
  detectors: string[];
  layout: Record<string, [number, number]>;
}

export interface SessionState {
  id: string;
  scene_name: string | null;
  scene: SceneDoc;
  scene_hash: string;
  seed: number;
  shots: number;
  counts: Record<string, number>;
  coincidences: Record<string, number>;
  bloch: Record<string, Vec3 | null>;
  seq: number;
}

export interface SceneInfo {
  name: string;
  description: string;
}
