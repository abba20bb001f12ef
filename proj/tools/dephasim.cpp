#include <iostream>

#include "dephasim/cli.hpp"

int main(int argc, char** argv) {
    return dephasim::run_cli(argc, argv, std::cout, std::cerr);
}
