#include "common.hpp"

int main(int argc, char** argv) { return edei::cli::run(argc, argv); }
