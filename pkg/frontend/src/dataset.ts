/**
 * Reader for datasets exported by the radiomaps pipeline.
 *
 * Layout (all rasters little-endian float32 payloads with a JSON sidecar):
 *
 *   <dataset>/manifest.json
 *   <dataset>/samples/<id>/channels.json        ordered channel registry
 *   <dataset>/samples/<id>/features/<name>.f32  normalized inputs in [-1, 1]
 *   <dataset>/samples/<id>/target.f32           gray path-loss map in [0, 1]
 *   <dataset>/samples/<id>/tx.json              transmitter config
 */
import { readFileSync } from 'node:fs';
import path from 'node:path';

export const MANIFEST_VERSION = '1';

/** Slack for float32 rounding of values normalized in float64. */
const RANGE_TOL = 1e-6;

export interface ChannelEntry {
  name: string;
  file: string;
  lo: number;
  hi: number;
  kind: string;
}

export interface GridInfo {
  width: number;
  height: number;
  resolution_m: number;
}

export interface SampleEntry {
  sample_id: string;
  scene_id: string;
  pattern_id: string;
  path: string;
  split: string;
}

export interface Manifest {
  version: string;
  grid: GridInfo;
  channels: ChannelEntry[];
  split_seed: number;
  splits: { train: string[]; val: string[]; test: string[] };
  samples: SampleEntry[];
  sim_params?: Record<string, unknown> | null;
}

export interface Raster {
  values: Float32Array;
  width: number;
  height: number;
  resolution: number;
}

export interface Sample {
  sampleId: string;
  sceneId: string;
  split: string;
  channelNames: string[];
  /** (channels, height, width), C-order. */
  features: Float32Array;
  /** (height, width), C-order. */
  target: Float32Array;
  width: number;
  height: number;
}

export function loadManifest(datasetDir: string): Manifest {
  const manifestPath = path.join(datasetDir, 'manifest.json');
  const manifest = JSON.parse(readFileSync(manifestPath, 'utf8')) as Manifest;
  if (manifest.version !== MANIFEST_VERSION) {
    throw new Error(
      `manifest version ${JSON.stringify(manifest.version)}, expected "${MANIFEST_VERSION}"`,
    );
  }
  return manifest;
}

/** Read one payload + sidecar pair; the payload path ends in .f32. */
export function readRaster(payloadPath: string): Raster {
  const sidecarPath = payloadPath.replace(/\.f32$/, '.json');
  const header = JSON.parse(readFileSync(sidecarPath, 'utf8')) as {
    width: number;
    height: number;
    resolution_m: number;
    dtype: string;
  };
  if (header.dtype !== 'f32le') {
    throw new Error(`${payloadPath}: unsupported dtype ${JSON.stringify(header.dtype)}`);
  }
  const buf = readFileSync(payloadPath);
  const n = header.width * header.height;
  if (buf.byteLength !== n * 4) {
    throw new Error(`${payloadPath}: expected ${n * 4} bytes, found ${buf.byteLength}`);
  }
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  const values = new Float32Array(n);
  for (let i = 0; i < n; i++) {
    values[i] = view.getFloat32(i * 4, true);
  }
  return { values, width: header.width, height: header.height, resolution: header.resolution_m };
}

function checkRange(values: Float32Array, lo: number, hi: number, label: string): void {
  for (let i = 0; i < values.length; i++) {
    const v = values[i];
    if (!(v >= lo - RANGE_TOL && v <= hi + RANGE_TOL)) {
      throw new Error(`${label}: value ${v} at index ${i} outside [${lo}, ${hi}]`);
    }
  }
}

/**
 * Load one sample as a (C, H, W) feature tensor plus its (H, W) target.
 * `channelNames` selects and orders channels; omitted means the full registry.
 */
export function loadSample(
  datasetDir: string,
  ref: SampleEntry | string,
  channelNames?: string[],
): Sample {
  const entry: Pick<SampleEntry, 'sample_id' | 'scene_id' | 'path' | 'split'> =
    typeof ref === 'string'
      ? { sample_id: ref, scene_id: '', path: `samples/${ref}`, split: '' }
      : ref;
  const sdir = path.join(datasetDir, entry.path);

  const registry = (
    JSON.parse(readFileSync(path.join(sdir, 'channels.json'), 'utf8')) as {
      channels: ChannelEntry[];
    }
  ).channels;
  const byName = new Map(registry.map((c) => [c.name, c]));
  const selected = channelNames ?? registry.map((c) => c.name);
  for (const name of selected) {
    if (!byName.has(name)) {
      throw new Error(`unknown channel ${JSON.stringify(name)} in ${entry.sample_id}`);
    }
  }

  const target = readRaster(path.join(sdir, 'target.f32'));
  checkRange(target.values, 0, 1, `${entry.sample_id}/target`);

  const plane = target.width * target.height;
  const features = new Float32Array(selected.length * plane);
  selected.forEach((name, c) => {
    const ch = byName.get(name)!;
    const raster = readRaster(path.join(sdir, ch.file));
    if (raster.width !== target.width || raster.height !== target.height) {
      throw new Error(
        `${entry.sample_id}/${name}: grid ${raster.width}x${raster.height} differs from target`,
      );
    }
    checkRange(raster.values, -1, 1, `${entry.sample_id}/${name}`);
    features.set(raster.values, c * plane);
  });

  return {
    sampleId: entry.sample_id,
    sceneId: entry.scene_id,
    split: entry.split,
    channelNames: [...selected],
    features,
    target: target.values,
    width: target.width,
    height: target.height,
  };
}

/** Load every sample of one split, in manifest (sorted sample id) order. */
export function loadSplit(
  datasetDir: string,
  split: 'train' | 'val' | 'test',
  channelNames?: string[],
): Sample[] {
  const manifest = loadManifest(datasetDir);
  return manifest.samples
    .filter((s) => s.split === split)
    .map((s) => loadSample(datasetDir, s, channelNames));
}
