export {
  MANIFEST_VERSION,
  loadManifest,
  loadSample,
  loadSplit,
  readRaster,
} from './dataset.js';
export type { ChannelEntry, GridInfo, Manifest, Raster, Sample, SampleEntry } from './dataset.js';
export { MAX_PL_DB, NOISE_FLOOR_DB, SPAN_DB, grayToDb, mse, nmse, rmseDb, rmseGray } from './metrics.js';
export { ToyModel, mulberry32 } from './model.js';
export type { ToyModelConfig } from './model.js';
export { trainToy } from './train.js';
export type { TrainOptions, TrainReport } from './train.js';
export { initBackend } from './backend.js';
