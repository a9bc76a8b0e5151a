/**
 * Wire protocol spoken with the engine: one JSON object per socket frame.
 * Field names must match the engine bit for bit.
 */

export type Box = [number, number, number, number]; // x, y, w, h in page CSS px

export interface WordEntry {
  i: number;
  char: number;
  sent: number;
  para: number;
  text: string;
  box: Box;
}

export interface ParagraphEntry {
  id: number;
  box: Box;
}

export interface MediaEntry {
  id: number;
  kind: "image" | "video";
  box: Box;
}

export interface Manifest {
  url: string;
  page_text: string;
  words: WordEntry[];
  paragraphs: ParagraphEntry[];
  media: MediaEntry[];
}

export interface LayoutMessage extends Manifest {
  type: "layout";
}

export interface ViewportMessage {
  type: "viewport";
  t_us: number;
  win_x: number;
  win_y: number;
  scroll_x: number;
  scroll_y: number;
  dpr: number;
}

export interface HelloMessage {
  type: "hello";
  role: "source" | "layout" | "viewer";
  session: string;
  participant: string;
}

export interface TabStateMessage {
  type: "tabstate";
  state: "visible" | "hidden" | "closed";
}

/** Per-word metrics as broadcast by the engine: ms values, 3-decimal exact. */
export interface WordMetricsWire {
  word_index: number;
  TFD: number;
  AFD: number;
  MiFD: number;
  MaFD: number;
  F_count: number;
  TFF_ts: number | null;
  TTFF: number | null;
  FFD: number | null;
  FpFFD: number | null;
  Fp_group: number | null;
  FpR: 0 | 1 | null;
  FpD: number | null;
  RPD: number | null;
  sRPD: number | null;
  RRD: number;
}

export interface SnapshotMessage {
  type: "snapshot";
  manifest: Manifest | null;
  metrics: WordMetricsWire[];
}

export interface FixationEndMessage {
  type: "fixation_end";
  start_us: number;
  end_us: number;
  duration_us: number;
  centroid: [number, number] | null;
  sample_count: number;
  word_index: number | null;
  media_id: number | null;
  aoi_box: Box | null;
  fixation_group: number;
}

export interface SaccadeMessage {
  type: "saccade";
  start_us: number;
  end_us: number;
  duration_us: number;
  start_pt: [number, number] | null;
  end_pt: [number, number] | null;
  seq_index: number;
  paragraph_id: number | null;
  aoi_seq_index: number | null;
  length_px: number;
  amplitude_deg: number;
  peak_velocity_dps: number;
  direction: [number, number];
  degenerate: boolean;
}

export interface MetricsUpdateMessage {
  type: "metrics_update";
  word_index: number;
  metrics: WordMetricsWire;
}

export type ViewerMessage =
  | SnapshotMessage
  | FixationEndMessage
  | SaccadeMessage
  | MetricsUpdateMessage;

export function helloMsg(
  role: HelloMessage["role"],
  session: string,
  participant = "",
): HelloMessage {
  return { type: "hello", role, session, participant };
}

export function layoutMsg(manifest: Manifest): LayoutMessage {
  return { type: "layout", ...manifest };
}

export function tabStateMsg(state: TabStateMessage["state"]): TabStateMessage {
  return { type: "tabstate", state };
}

export function parseViewerMessage(raw: string): ViewerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const type = (data as { type?: unknown }).type;
  if (
    type === "snapshot" ||
    type === "fixation_end" ||
    type === "saccade" ||
    type === "metrics_update"
  ) {
    return data as ViewerMessage;
  }
  return null;
}
