#include "polyland/cli.hpp"

int main(int argc, char** argv) { return polyland::cli::dispatch(argc, argv); }
