#include "cdptwin/cli/app.hpp"

int main(int argc, char** argv) { return cdptwin::cli::run(argc, argv); }
