#include "supremal/cli.hpp"

int main(int argc, char** argv) { return supremal::cli::run(argc, argv); }
