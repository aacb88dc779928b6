#include "mudet/cli.hpp"

int main(int argc, char** argv) { return mudet::cli::run_main(argc, argv); }
