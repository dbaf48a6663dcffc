from bcclique import *
