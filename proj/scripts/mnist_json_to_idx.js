#!/usr/bin/env node
// Converts the digit corpus bundled with the npm `mnist` package
// (per-class JSON files of flat [0,1] pixel arrays, 28x28 grayscale)
// into IDX image/label files readable by load_idx.
//
// Usage: node mnist_json_to_idx.js <digits-dir> <out-images.idx> <out-labels.idx>
//
// Images are interleaved round-robin across classes (0,1,...,9,0,1,...) so the
// file order is deterministic and roughly class-balanced from any prefix.

'use strict';
const fs = require('fs');
const path = require('path');

if (process.argv.length !== 5) {
  console.error('usage: node mnist_json_to_idx.js <digits-dir> <out-images.idx> <out-labels.idx>');
  process.exit(1);
}
const [digitsDir, outImages, outLabels] = process.argv.slice(2);
const SIDE = 28;
const PIXELS = SIDE * SIDE;

const perClass = [];
for (let c = 0; c < 10; c++) {
  const file = path.join(digitsDir, `${c}.json`);
  const data = JSON.parse(fs.readFileSync(file, 'utf8')).data;
  if (data.length % PIXELS !== 0) {
    console.error(`${file}: length ${data.length} not a multiple of ${PIXELS}`);
    process.exit(1);
  }
  perClass.push(data);
}

const counts = perClass.map((d) => d.length / PIXELS);
const total = counts.reduce((a, b) => a + b, 0);

const images = Buffer.alloc(16 + total * PIXELS);
images.writeUInt32BE(0x00000803, 0);
images.writeUInt32BE(total, 4);
images.writeUInt32BE(SIDE, 8);
images.writeUInt32BE(SIDE, 12);
const labels = Buffer.alloc(8 + total);
labels.writeUInt32BE(0x00000801, 0);
labels.writeUInt32BE(total, 4);

let n = 0;
const maxCount = Math.max(...counts);
for (let i = 0; i < maxCount; i++) {
  for (let c = 0; c < 10; c++) {
    if (i >= counts[c]) continue;
    const src = perClass[c];
    const base = 16 + n * PIXELS;
    for (let p = 0; p < PIXELS; p++) {
      images[base + p] = Math.round(src[i * PIXELS + p] * 255);
    }
    labels[8 + n] = c;
    n++;
  }
}

fs.writeFileSync(outImages, images);
fs.writeFileSync(outLabels, labels);
console.log(`wrote ${n} images to ${outImages}, labels to ${outLabels}`);
