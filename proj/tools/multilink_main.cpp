#include "multilink/cli.hpp"

int main(int argc, char** argv) { return multilink::run_cli(argc, argv); }
