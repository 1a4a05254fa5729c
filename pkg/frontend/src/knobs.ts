// Waveplate knob arithmetic: snapping, stepping, wrapping.
//
// Plates are half-turn periodic, so displayed angles live in [0, 180) and
// a click past 175 wraps to 0.  Values are kept as multiples of the
// component's step; the server echo is authoritative.

export const FULL_TURN = 180;

export function snapToStep(value: number, step: number): number {
  const snapped = Math.round(value / step) * step;
  return normalize(snapped);
}

export function normalize(value: number): number {
  let v = value % FULL_TURN;
  if (v < 0) {
    v += FULL_TURN;
  }
  // -0 is an artifact of the modulo, not a real angle
  return Object.is(v, -0) ? 0 : v;
}

export function rotate(current: number, direction: 1 | -1, step: number): number {
  return normalize(snapToStep(current, step) + direction * step);
}

export function isOnStep(value: number, step: number): boolean {
  const remainder = Math.abs(value % step);
  return remainder < 1e-9 || Math.abs(remainder - step) < 1e-9;
}
