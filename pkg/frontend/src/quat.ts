// Quaternion edit math, (x, y, z, w) order to match the wire format.
// Only used to apply single-waypoint edits; all trajectory smoothing
// comes from the service.

export type Quat = [number, number, number, number];

export function normalize(q: Quat): Quat {
  const n = Math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
}

export function multiply(a: Quat, b: Quat): Quat {
  const [x1, y1, z1, w1] = a;
  const [x2, y2, z2, w2] = b;
  return [
    w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
    w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
    w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
  ];
}

export function fromAxisAngle(axis: [number, number, number], angle: number): Quat {
  const n = Math.sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  const s = Math.sin(angle / 2) / n;
  return normalize([axis[0] * s, axis[1] * s, axis[2] * s, Math.cos(angle / 2)]);
}
