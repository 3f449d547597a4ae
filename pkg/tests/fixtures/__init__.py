from .uos import *
