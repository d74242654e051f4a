import * as tf from '@tensorflow/tfjs';
import { setWasmPaths } from '@tensorflow/tfjs-backend-wasm';
import { createRequire } from 'node:module';
import path from 'node:path';

let ready: Promise<string> | undefined;

/**
 * Select the fastest available backend, once per process. The wasm backend
 * needs to be told where its .wasm binaries live when running under Node;
 * require.resolve works in every module transform, unlike import.meta.resolve.
 */
export function initBackend(): Promise<string> {
  ready ??= (async () => {
    try {
      const require = createRequire(import.meta.url);
      const entry = require.resolve('@tensorflow/tfjs-backend-wasm');
      setWasmPaths(path.dirname(entry) + path.sep);
      if (!(await tf.setBackend('wasm'))) {
        throw new Error('wasm backend rejected');
      }
    } catch {
      await tf.setBackend('cpu');
    }
    await tf.ready();
    return tf.getBackend();
  })();
  return ready;
}
