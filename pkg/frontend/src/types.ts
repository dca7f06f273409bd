// Wire types of the session service (see the package README for the API).

export type SegmentStatus = "pending" | "accepted" | "rejected";

export interface SegmentDto {
  id: string;
  status: SegmentStatus;
  major: boolean;
  component: number;
  points: [number, number][];
}

export interface OverlayDto {
  session: string;
  pruned: boolean;
  segments: SegmentDto[];
}

export interface GraphJson {
  frame: { lat0: number; lon0: number };
  nodes: { id: number; x: number; y: number }[];
  edges: [number, number][];
}

export interface TeleportDto {
  exhausted: boolean;
  component?: number;
  score?: number;
  bbox?: [number, number, number, number];
  segment_ids?: string[];
}

export interface StatusDto {
  id: string;
  state: string;
  segments: Record<SegmentStatus, number>;
  components: number;
  teleports_taken: number;
}
