// Wire protocol types for the detector adapter: line-delimited JSON over
// stdio, one request line -> exactly one response line, ids echoed back.

export interface DetectionBox {
  class_id: number;
  cx: number;
  cy: number;
  w: number;
  h: number;
  confidence: number;
}

export interface DetectRequest {
  id: string;
  image: string;
  conf_threshold: number;
}

export interface DetectResponse {
  id: string;
  detections: DetectionBox[];
}

export interface ErrorResponse {
  id: string | null;
  error: string;
}

export class ProtocolError extends Error {}

export function parseRequest(line: string): DetectRequest {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch (err) {
    throw new ProtocolError(`request is not valid JSON: ${String(err)}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new ProtocolError("request must be a JSON object");
  }
  const obj = raw as Record<string, unknown>;
  if (typeof obj.id !== "string" || obj.id.length === 0) {
    throw new ProtocolError("request needs a non-empty string 'id'");
  }
  if (typeof obj.image !== "string" || obj.image.length === 0) {
    throw new ProtocolError("request needs a string 'image' path");
  }
  const conf = obj.conf_threshold;
  if (typeof conf !== "number" || !Number.isFinite(conf) || conf < 0 || conf > 1) {
    throw new ProtocolError("request needs a 'conf_threshold' number in [0, 1]");
  }
  return { id: obj.id, image: obj.image, conf_threshold: conf };
}

export function requestIdOf(line: string): string | null {
  // Best-effort id extraction so error responses can still echo an id.
  try {
    const raw = JSON.parse(line);
    if (typeof raw === "object" && raw !== null && typeof (raw as any).id === "string") {
      return (raw as any).id;
    }
  } catch {
    // fall through: the line was not JSON at all
  }
  return null;
}

export function validateBox(box: DetectionBox, classCount: number): void {
  const { class_id, cx, cy, w, h, confidence } = box;
  if (!Number.isInteger(class_id) || class_id < 0 || class_id >= classCount) {
    throw new ProtocolError(`class_id ${class_id} outside the ${classCount}-class scheme`);
  }
  if (!(cx >= 0 && cx <= 1 && cy >= 0 && cy <= 1)) {
    throw new ProtocolError(`box center (${cx}, ${cy}) outside [0, 1]`);
  }
  if (!(w > 0 && w <= 1 && h > 0 && h <= 1)) {
    throw new ProtocolError(`box size (${w}, ${h}) outside (0, 1]`);
  }
  if (!(confidence >= 0 && confidence <= 1)) {
    throw new ProtocolError(`confidence ${confidence} outside [0, 1]`);
  }
}
