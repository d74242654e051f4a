/**
 * A deliberately tiny encoder-decoder CNN for map-to-map regression.
 *
 * The 3x3 convolutions are expressed as nine shifted slices concatenated into
 * im2col columns followed by a single matMul, and pooling/upsampling as
 * reshape-mean / reshape-concat. That keeps every op (and, importantly, every
 * gradient) inside the kernel set the wasm backend implements; the stock
 * conv2d layers cannot train there because Conv2DBackpropFilter is missing.
 */
import * as tf from '@tensorflow/tfjs';

/** Deterministic 32-bit PRNG (mulberry32); good enough for weight init. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function heNormal(fanIn: number, n: number, rand: () => number): Float32Array {
  const std = Math.sqrt(2 / fanIn);
  const out = new Float32Array(n);
  for (let i = 0; i < n; i += 2) {
    const u1 = Math.max(rand(), 1e-12);
    const u2 = rand();
    const r = Math.sqrt(-2 * Math.log(u1));
    out[i] = r * Math.cos(2 * Math.PI * u2) * std;
    if (i + 1 < n) out[i + 1] = r * Math.sin(2 * Math.PI * u2) * std;
  }
  return out;
}

/** 'same' 3x3 convolution via im2col columns and one matMul. */
function conv3x3(x: tf.Tensor4D, w: tf.Variable, b: tf.Variable): tf.Tensor4D {
  const [batch, h, width, c] = x.shape;
  const padded = tf.pad(x, [
    [0, 0],
    [1, 1],
    [1, 1],
    [0, 0],
  ]);
  const shifts: tf.Tensor4D[] = [];
  for (let dy = 0; dy < 3; dy++) {
    for (let dx = 0; dx < 3; dx++) {
      shifts.push(tf.slice(padded, [0, dy, dx, 0], [batch, h, width, c]));
    }
  }
  const cols = tf.concat(shifts, 3).reshape([batch * h * width, 9 * c]);
  const filters = w.shape[1] as number;
  return tf.matMul(cols, w).add(b).reshape([batch, h, width, filters]);
}

const relu = (x: tf.Tensor4D): tf.Tensor4D => tf.maximum(x, 0);

/** 2x2 mean pool via reshape (gradient-friendly on every backend). */
function pool2(x: tf.Tensor4D): tf.Tensor4D {
  const [batch, h, w, c] = x.shape;
  return x
    .reshape([batch, h / 2, 2, w / 2, 2, c])
    .mean([2, 4])
    .reshape([batch, h / 2, w / 2, c]);
}

/** 2x nearest-neighbour upsample via doubling concats. */
function up2(x: tf.Tensor4D): tf.Tensor4D {
  const [batch, h, w, c] = x.shape;
  const r = x.reshape([batch, h, 1, w, 1, c]);
  const rows = tf.concat([r, r], 2);
  return tf.concat([rows, rows], 4).reshape([batch, 2 * h, 2 * w, c]);
}

export interface ToyModelConfig {
  inChannels: number;
  seed: number;
  /** Encoder/decoder width; the bottleneck uses twice this. */
  width?: number;
}

export class ToyModel {
  readonly inChannels: number;
  private readonly vars: Record<string, tf.Variable>;

  constructor({ inChannels, seed, width = 8 }: ToyModelConfig) {
    this.inChannels = inChannels;
    const bneck = 2 * width;
    const rand = mulberry32(seed);
    const weight = (rows: number, cols: number) =>
      tf.variable(tf.tensor2d(heNormal(rows, rows * cols, rand), [rows, cols]));
    const bias = (n: number) => tf.variable(tf.zeros([n]));
    this.vars = {
      w1: weight(9 * inChannels, width),
      b1: bias(width),
      w2: weight(9 * width, bneck),
      b2: bias(bneck),
      w3: weight(9 * (width + bneck), width),
      b3: bias(width),
      w4: weight(width, 1),
      b4: bias(1),
    };
  }

  get variables(): tf.Variable[] {
    return Object.values(this.vars);
  }

  paramCount(): number {
    return this.variables.reduce((acc, v) => acc + v.size, 0);
  }

  /** NHWC in, NHW1 out in (0, 1); H and W must be even. */
  forward(x: tf.Tensor4D): tf.Tensor4D {
    const [batch, h, w] = x.shape;
    if (h % 2 !== 0 || w % 2 !== 0) {
      throw new Error(`grid ${h}x${w} must be even for the pooled stage`);
    }
    const p = this.vars;
    return tf.tidy(() => {
      const e1 = relu(conv3x3(x, p.w1, p.b1));
      const bottleneck = relu(conv3x3(pool2(e1), p.w2, p.b2));
      const merged = tf.concat([up2(bottleneck), e1], 3);
      const d1 = relu(conv3x3(merged, p.w3, p.b3));
      const head = tf.matMul(d1.reshape([batch * h * w, p.w4.shape[0] as number]), p.w4).add(p.b4);
      return tf.sigmoid(head).reshape([batch, h, w, 1]);
    });
  }

  dispose(): void {
    this.variables.forEach((v) => v.dispose());
  }
}
