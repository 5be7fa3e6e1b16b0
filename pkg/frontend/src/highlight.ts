/** Split sample text into plain/highlighted segments from span offsets. */

export interface Segment {
  text: string;
  highlighted: boolean;
}

export function segmentText(text: string, spans: [number, number][]): Segment[] {
  const sorted = [...spans].sort((a, b) => a[0] - b[0]);
  const segments: Segment[] = [];
  let cursor = 0;
  for (const [start, end] of sorted) {
    if (start < cursor || end > text.length || start >= end) continue; // defensive: drop bad spans
    if (start > cursor) segments.push({ text: text.slice(cursor, start), highlighted: false });
    segments.push({ text: text.slice(start, end), highlighted: true });
    cursor = end;
  }
  if (cursor < text.length) segments.push({ text: text.slice(cursor), highlighted: false });
  return segments;
}
