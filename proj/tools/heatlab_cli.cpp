#include "heatlab/cli.hpp"

int main(int argc, char** argv) { return heatlab::run(argc, argv); }
