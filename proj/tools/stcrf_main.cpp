#include "stcrf/cli.hpp"

int main(int argc, char** argv) { return stcrf::dispatch(argc, argv); }
