import { readFileSync } from 'node:fs';
import { fileURLToPath } from 'node:url';
import { describe, expect, it } from 'vitest';

import { loadManifest, loadSample } from '../src/dataset.js';
import { SPAN_DB, grayToDb, nmse, rmseDb, rmseGray } from '../src/metrics.js';
import { mulberry32 } from '../src/model.js';

const FIXTURE = fileURLToPath(new URL('../fixtures/dataset', import.meta.url));
const GOLDEN = JSON.parse(
  readFileSync(fileURLToPath(new URL('../fixtures/golden.json', import.meta.url)), 'utf8'),
);

describe('metric definitions', () => {
  it('returns zero for identical prediction and truth', () => {
    const rand = mulberry32(3);
    const t = Float32Array.from({ length: 256 }, () => rand());
    expect(rmseGray(t, t)).toBe(0);
    expect(rmseDb(t, t)).toBe(0);
    expect(nmse(t, t)).toBe(0);
  });

  it('scales gray RMSE by exactly the 77 dB span', () => {
    const rand = mulberry32(11);
    const pred = Array.from({ length: 500 }, () => rand());
    const truth = Array.from({ length: 500 }, () => rand());
    expect(SPAN_DB).toBe(77);
    expect(rmseDb(pred, truth)).toBe(77 * rmseGray(pred, truth));
  });

  it('reproduces a hand-computed offset pair', () => {
    const truth = new Array(64).fill(0.5);
    const pred = truth.map((v) => v + 1 / 77);
    // 1/77 gray error is exactly 1 dB; truth decodes to -88.5 dB
    expect(rmseDb(pred, truth)).toBeCloseTo(1.0, 9);
    expect(nmse(pred, truth)).toBeCloseTo(1 / (88.5 * 88.5), 12);
  });

  it('clamps before decoding to dB', () => {
    expect(grayToDb(-0.5)).toBe(-127);
    expect(grayToDb(0)).toBe(-127);
    expect(grayToDb(0.5)).toBe(-88.5);
    expect(grayToDb(1)).toBe(-50);
    expect(grayToDb(1.5)).toBe(-50);
  });

  it('rejects mismatched lengths and an all-zero-dB truth', () => {
    expect(() => rmseGray([0, 1], [0])).toThrow(/length/);
    // with a symmetric custom range, gray 0.5 decodes to exactly 0 dB
    const half = new Array(16).fill(0.5);
    expect(() => nmse(half, half, -10, 10)).toThrow(/zero dB/);
  });
});

describe('parity with the exporter implementation', () => {
  it('matches frozen metric values for procedural predictions', () => {
    const manifest = loadManifest(FIXTURE);
    for (const [sampleId, ref] of Object.entries<any>(GOLDEN.samples)) {
      const entry = manifest.samples.find((s) => s.sample_id === sampleId)!;
      const t = loadSample(FIXTURE, entry).target;
      const constHalf = new Float64Array(t.length).fill(0.5);
      const affine = Float64Array.from(t, (v) => Math.min(Math.max(0.9 * v + 0.05, 0), 1));

      const cases: Array<[Float64Array, any]> = [
        [constHalf, ref.metrics.const_half],
        [affine, ref.metrics.affine],
      ];
      for (const [pred, expected] of cases) {
        expect(Math.abs(rmseGray(pred, t) - expected.rmse_gray)).toBeLessThan(1e-9);
        expect(Math.abs(rmseDb(pred, t) - expected.rmse_db)).toBeLessThan(1e-9);
        expect(Math.abs(nmse(pred, t) - expected.nmse)).toBeLessThan(1e-9);
      }
    }
  });
});
