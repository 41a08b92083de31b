#!/usr/bin/env node
// Minimal SMT-LIB 2 front end over the WebAssembly build of Z3.
// Reads a script from a file argument (or stdin), evaluates it, prints the
// solver output.  Flags starting with "-" are accepted and ignored so that
// callers may pass z3-style arguments like "-smt2" or "-in".

"use strict";

const fs = require("fs");
const path = require("path");

function readScript() {
  const fileArgs = process.argv.slice(2).filter((a) => !a.startsWith("-"));
  if (fileArgs.length > 0) {
    return fs.readFileSync(fileArgs[0], "utf8");
  }
  return fs.readFileSync(0, "utf8");
}

async function main() {
  const script = readScript();
  const { init } = require(path.join(__dirname, "node_modules", "z3-solver"));
  const { Z3 } = await init();
  const cfg = Z3.mk_config();
  const ctx = Z3.mk_context(cfg);
  try {
    const out = await Z3.eval_smtlib2_string(ctx, script);
    process.stdout.write(out);
  } finally {
    Z3.del_context(ctx);
    Z3.del_config(cfg);
  }
  process.exit(0);
}

main().catch((err) => {
  process.stderr.write(String(err && err.stack ? err.stack : err) + "\n");
  process.exit(1);
});
