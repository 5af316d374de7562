#pragma once

namespace oedgrid {

// Entry point of the oedgrid command. Returns 0 on success, 1 on usage or input
// errors, 2 on numerical failures.
int run_cli(int argc, char** argv);

}  // namespace oedgrid
