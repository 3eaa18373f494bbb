#include <iostream>

#include "snapkit/cli/commands.hpp"

int main(int argc, char** argv) {
    return snapkit::cli::run(argc, argv, std::cout, std::cerr);
}
