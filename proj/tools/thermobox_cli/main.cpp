#include "cli.hpp"

int main(int argc, char** argv) { return thermobox::cli::run(argc, argv); }
