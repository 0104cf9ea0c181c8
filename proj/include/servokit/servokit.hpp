#pragma once

#include "servokit/archcheck.hpp"
#include "servokit/camera.hpp"
#include "servokit/config.hpp"
#include "servokit/corners.hpp"
#include "servokit/csvio.hpp"
#include "servokit/datapipe.hpp"
#include "servokit/errors.hpp"
#include "servokit/image.hpp"
#include "servokit/kinematics.hpp"
#include "servokit/plot.hpp"
#include "servokit/rng.hpp"
#include "servokit/servo.hpp"
#include "servokit/vision.hpp"
