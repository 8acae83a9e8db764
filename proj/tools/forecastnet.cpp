#include "forecastnet/cli.hpp"

int main(int argc, char **argv) { return forecastnet::cli::dispatch(argc, argv); }
