#include <vector>
#include <string>

#include "qrep/cli.hpp"

int main(int argc, char** argv) {
    return qrep::cli::run_command(std::vector<std::string>(argv + 1, argv + argc));
}
