#pragma once

namespace vrs {

// Exit codes: 0 pass, 2 failed check or run error, 1 usage error.
int cli_main(int argc, char** argv);

}  // namespace vrs
