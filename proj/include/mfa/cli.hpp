// Command-line front end: map-info, spectrum, irregular, boxdim, oscillation.
#pragma once

namespace mfa {

// parses argv, dispatches, maps failures to the exit-code contract:
// 0 success, 2 validation, 3 optimizer, 4 harvesting or budget
int run_cli(int argc, char** argv);

}  // namespace mfa
