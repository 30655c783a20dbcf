#include <iostream>
#include <string>
#include <vector>

#include "freqlab/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return freqlab::cli::run(args, std::cout, std::cerr);
}
