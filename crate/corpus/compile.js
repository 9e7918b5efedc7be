const solc = require('solc');
const fs = require('fs');
const path = require('path');
const dir = process.argv[2];
for (const f of fs.readdirSync(dir).filter(f => f.endsWith('.sol'))) {
  const src = fs.readFileSync(path.join(dir, f), 'utf8');
  const input = { language: 'Solidity', sources: { [f]: { content: src } },
    settings: { optimizer: { enabled: false }, outputSelection: { '*': { '*': ['abi', 'evm.bytecode.object', 'evm.deployedBytecode.object', 'evm.gasEstimates'] } } } };
  const out = JSON.parse(solc.compileStandardWrapper(JSON.stringify(input)));
  if (out.errors) for (const e of out.errors) console.error(e.formattedMessage);
  const name = f.replace('.sol', '');
  const c = out.contracts[f][name];
  fs.writeFileSync(path.join(dir, name + '.bin'), c.evm.bytecode.object + '\n');
  fs.writeFileSync(path.join(dir, name + '.bin-runtime'), c.evm.deployedBytecode.object + '\n');
  fs.writeFileSync(path.join(dir, name + '.abi'), JSON.stringify(c.abi) + '\n');
  console.log(name, JSON.stringify(c.evm.gasEstimates));
}
