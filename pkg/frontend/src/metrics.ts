/**
 * Error metrics matching the exporter's conventions: gray maps encode clamped
 * path loss affinely ([-127 dB, -50 dB] onto [0, 1]), so dB-domain RMSE is the
 * gray RMSE scaled by the 77 dB span, and NMSE is computed on decoded dB maps.
 */

export const NOISE_FLOOR_DB = -127.0;
export const MAX_PL_DB = -50.0;
export const SPAN_DB = MAX_PL_DB - NOISE_FLOOR_DB;

type Vec = ArrayLike<number>;

function checkLengths(pred: Vec, truth: Vec): void {
  if (pred.length !== truth.length) {
    throw new Error(`prediction length ${pred.length} vs truth length ${truth.length}`);
  }
}

export function rmseGray(pred: Vec, truth: Vec): number {
  checkLengths(pred, truth);
  let acc = 0;
  for (let i = 0; i < pred.length; i++) {
    const d = pred[i] - truth[i];
    acc += d * d;
  }
  return Math.sqrt(acc / pred.length);
}

export function rmseDb(
  pred: Vec,
  truth: Vec,
  noiseFloorDb = NOISE_FLOOR_DB,
  maxPlDb = MAX_PL_DB,
): number {
  return (maxPlDb - noiseFloorDb) * rmseGray(pred, truth);
}

export function grayToDb(g: number, noiseFloorDb = NOISE_FLOOR_DB, maxPlDb = MAX_PL_DB): number {
  const clipped = Math.min(Math.max(g, 0), 1);
  return clipped * (maxPlDb - noiseFloorDb) + noiseFloorDb;
}

/** Normalized MSE of the decoded dB maps: ||pred - truth||^2 / ||truth||^2. */
export function nmse(
  pred: Vec,
  truth: Vec,
  noiseFloorDb = NOISE_FLOOR_DB,
  maxPlDb = MAX_PL_DB,
): number {
  checkLengths(pred, truth);
  let num = 0;
  let denom = 0;
  for (let i = 0; i < pred.length; i++) {
    const p = grayToDb(pred[i], noiseFloorDb, maxPlDb);
    const t = grayToDb(truth[i], noiseFloorDb, maxPlDb);
    num += (p - t) * (p - t);
    denom += t * t;
  }
  if (denom === 0) {
    throw new Error('truth map is identically zero dB; NMSE undefined');
  }
  return num / denom;
}

export function mse(pred: Vec, truth: Vec): number {
  const r = rmseGray(pred, truth);
  return r * r;
}
