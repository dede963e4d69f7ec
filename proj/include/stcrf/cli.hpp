#pragma once

namespace stcrf {

// Entry point behind main(). Returns 0 on success, 1 on validation/usage
// errors, 2 on runtime failures. Diagnostics go to stderr.
int dispatch(int argc, const char* const* argv);

}  // namespace stcrf
