"""Center-of-mass estimation of grasped rods from joint torques, with a simulated bench."""

from .errors import ComGraspError
from .kinematics import JointSpec, KinematicChain, forward_kinematics, lever_arms, self_gravity_torques
from .scene import CameraModel, GraspPose, ObjectTransform, RodObject, benchmark_objects, sample_random_grasp
from .sensing import NoiseSpec, PayloadTruth, TorqueSnapshot, capture_after, capture_before
from .solver import ComEstimate, SolverConfig, plan_regrasp, project_to_object, residual, solve_gd, solve_ls_oracle

__version__ = "0.1.0"
