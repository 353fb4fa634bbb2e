#include "cli.hpp"

int main(int argc, char** argv) {
    return prodemb::cli::run_cli(argc, argv);
}
