#pragma once

#include "ictm/io/cloud_io.hpp"
#include "ictm/io/image_io.hpp"
#include "ictm/io/manifest.hpp"
#include "ictm/io/report_io.hpp"
