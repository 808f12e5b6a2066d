#include "cqadet/cli.hpp"

int main(int argc, char** argv) { return cqadet::run_cli(argc, argv); }
