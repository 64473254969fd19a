/** Non-overlapping 2:1 average pooling along the feature axis, applied
 * independently within each tower; tower order preserved. */

export function pool2to1(row: Float32Array, towerBoundary = 0): Float32Array {
  const spans: Array<[number, number]> =
    towerBoundary > 0
      ? [
          [0, towerBoundary],
          [towerBoundary, row.length],
        ]
      : [[0, row.length]];
  let total = 0;
  for (const [lo, hi] of spans) {
    const width = hi - lo;
    if (width % 2 !== 0) throw new Error(`tower [${lo}, ${hi}) has odd width ${width}`);
    total += width / 2;
  }
  const out = new Float32Array(total);
  let k = 0;
  for (const [lo, hi] of spans) {
    for (let j = lo; j < hi; j += 2) {
      out[k++] = (row[j] + row[j + 1]) / 2;
    }
  }
  return out;
}
