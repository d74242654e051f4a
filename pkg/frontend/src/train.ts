import * as tf from '@tensorflow/tfjs';

import { initBackend } from './backend.js';
import { Sample, loadSplit } from './dataset.js';
import { mse, nmse, rmseDb, rmseGray } from './metrics.js';
import { ToyModel, mulberry32 } from './model.js';

export interface TrainOptions {
  dataDir: string;
  split?: 'train' | 'val' | 'test';
  steps?: number;
  batchSize?: number;
  lr?: number;
  seed?: number;
  /** Channel subset (registry order applies when omitted). */
  channels?: string[];
}

export interface TrainReport {
  backend: string;
  split: string;
  samples: number;
  channels: string[];
  steps: number;
  batchSize: number;
  lr: number;
  seed: number;
  paramCount: number;
  initialMse: number;
  finalMse: number;
  /** Mean of per-sample metrics of the trained model over the split. */
  rmseGray: number;
  rmseDb: number;
  nmse: number;
}

/** Stack loaded (C,H,W) samples into one NHWC tensor pair. */
function toTensors(samples: Sample[]): { xs: tf.Tensor4D; ys: tf.Tensor4D } {
  const { width: w, height: h } = samples[0];
  const c = samples[0].channelNames.length;
  const plane = h * w;
  const xsData = new Float32Array(samples.length * plane * c);
  const ysData = new Float32Array(samples.length * plane);
  samples.forEach((s, n) => {
    const base = n * plane * c;
    for (let i = 0; i < plane; i++) {
      for (let ch = 0; ch < c; ch++) {
        xsData[base + i * c + ch] = s.features[ch * plane + i];
      }
    }
    ysData.set(s.target, n * plane);
  });
  return {
    xs: tf.tensor4d(xsData, [samples.length, h, w, c]),
    ys: tf.tensor4d(ysData, [samples.length, h, w, 1]),
  };
}

function datasetMse(model: ToyModel, xs: tf.Tensor4D, ys: tf.Tensor4D): number {
  return tf.tidy(() => tf.mean(tf.square(tf.sub(model.forward(xs), ys))).dataSync()[0]);
}

/**
 * Train the toy CNN with Adam on MSE for a fixed number of steps, batching
 * through a seeded shuffle of the split. Everything is pinned by `seed`.
 */
export async function trainToy(options: TrainOptions): Promise<TrainReport> {
  const {
    dataDir,
    split = 'train',
    steps = 200,
    batchSize = 32,
    lr = 1e-4,
    seed = 0,
    channels,
  } = options;
  if (steps < 0 || batchSize < 1) {
    throw new Error(`need steps >= 0 and batchSize >= 1, got ${steps}/${batchSize}`);
  }
  const backend = await initBackend();

  const samples = loadSplit(dataDir, split, channels);
  if (samples.length === 0) {
    throw new Error(`split "${split}" of ${dataDir} has no samples`);
  }
  const { xs, ys } = toTensors(samples);
  const model = new ToyModel({ inChannels: samples[0].channelNames.length, seed });
  const optimizer = tf.train.adam(lr);

  const initialMse = datasetMse(model, xs, ys);

  const rand = mulberry32(seed ^ 0x9e3779b9);
  let queue: number[] = [];
  const nextBatch = (): number[] => {
    const picks: number[] = [];
    while (picks.length < Math.min(batchSize, samples.length)) {
      if (queue.length === 0) {
        queue = samples.map((_, i) => i);
        for (let i = queue.length - 1; i > 0; i--) {
          const j = Math.floor(rand() * (i + 1));
          [queue[i], queue[j]] = [queue[j], queue[i]];
        }
      }
      picks.push(queue.pop()!);
    }
    return picks;
  };

  for (let step = 0; step < steps; step++) {
    const picks = nextBatch();
    tf.tidy(() => {
      const bx = tf.concat(
        picks.map((i) => tf.slice(xs, [i, 0, 0, 0], [1, -1, -1, -1])),
        0,
      );
      const by = tf.concat(
        picks.map((i) => tf.slice(ys, [i, 0, 0, 0], [1, -1, -1, -1])),
        0,
      );
      optimizer.minimize(() => tf.mean(tf.square(tf.sub(model.forward(bx), by))));
    });
  }

  const finalMse = datasetMse(model, xs, ys);

  const preds = tf.tidy(() => model.forward(xs).dataSync() as Float32Array);
  const plane = samples[0].width * samples[0].height;
  let sumRmseGray = 0;
  let sumRmseDb = 0;
  let sumNmse = 0;
  samples.forEach((s, n) => {
    const pred = preds.subarray(n * plane, (n + 1) * plane);
    sumRmseGray += rmseGray(pred, s.target);
    sumRmseDb += rmseDb(pred, s.target);
    sumNmse += nmse(pred, s.target);
  });

  const report: TrainReport = {
    backend,
    split,
    samples: samples.length,
    channels: samples[0].channelNames,
    steps,
    batchSize,
    lr,
    seed,
    paramCount: model.paramCount(),
    initialMse,
    finalMse,
    rmseGray: sumRmseGray / samples.length,
    rmseDb: sumRmseDb / samples.length,
    nmse: sumNmse / samples.length,
  };

  xs.dispose();
  ys.dispose();
  model.dispose();
  optimizer.dispose();
  return report;
}

export { mse };
