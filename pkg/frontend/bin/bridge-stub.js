#!/usr/bin/env node
// Stub-mode wrapper: the compositing pipeline's bridge protocol has no room
// for bridge-only flags, so this entry point pins --stub.
const { run } = require("../dist/cli.js");
run(process.argv.slice(2).concat(["--stub"])).then((code) => {
  process.exitCode = code;
});
