#!/usr/bin/env node
import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { trainToy } from './train.js';

void yargs(hideBin(process.argv))
  .scriptName('harness')
  .command(
    'train',
    'train the toy CNN on an exported dataset and print a JSON report',
    (y) =>
      y
        .option('data', { type: 'string', demandOption: true, describe: 'dataset directory' })
        .option('steps', { type: 'number', default: 200 })
        .option('batch', { type: 'number', default: 32 })
        .option('lr', { type: 'number', default: 1e-4 })
        .option('seed', { type: 'number', default: 0 })
        .option('split', {
          choices: ['train', 'val', 'test'] as const,
          default: 'train' as const,
        })
        .option('channels', {
          type: 'string',
          describe: 'comma-separated channel subset (default: all)',
        }),
    async (argv) => {
      const report = await trainToy({
        dataDir: argv.data,
        steps: argv.steps,
        batchSize: argv.batch,
        lr: argv.lr,
        seed: argv.seed,
        split: argv.split,
        channels: argv.channels ? argv.channels.split(',') : undefined,
      });
      console.log(JSON.stringify(report, null, 2));
    },
  )
  .demandCommand(1)
  .strict()
  .fail((msg, err) => {
    process.stderr.write(`error: ${msg ?? err?.message ?? 'unknown failure'}\n`);
    process.exit(2);
  })
  .parse();
